#include "betop/cli.hpp"

int main(int argc, char** argv) { return betop::cli_run(argc, argv); }
