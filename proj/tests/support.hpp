#pragma once

// Plumbing shared by the test suites: fixture access, scratch directories and
// an in-process CLI runner that captures both streams.

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "betop/cli.hpp"

namespace support {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(BETOP_FIXTURE_DIR) / name;
}

// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    TempDir() {
        static int counter = 0;
        const auto base = std::filesystem::temp_directory_path();
        do {
            path_ = base / ("betop_test_" + std::to_string(::getpid()) + "_" +
                            std::to_string(counter++));
        } while (std::filesystem::exists(path_));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

struct CliResult {
    int code{0};
    std::string out;
    std::string err;
};

// Runs the CLI entry point in-process with stdout/stderr redirected.
inline CliResult run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("betop");
    for (const std::string& a : args) argv.push_back(a.c_str());

    std::ostringstream out;
    std::ostringstream err;
    std::streambuf* prev_out = std::cout.rdbuf(out.rdbuf());
    std::streambuf* prev_err = std::cerr.rdbuf(err.rdbuf());
    int code = 2;
    try {
        code = betop::cli_run(static_cast<int>(argv.size()), argv.data());
    } catch (...) {
        std::cout.rdbuf(prev_out);
        std::cerr.rdbuf(prev_err);
        throw;
    }
    std::cout.rdbuf(prev_out);
    std::cerr.rdbuf(prev_err);
    return {code, out.str(), err.str()};
}

}  // namespace support
