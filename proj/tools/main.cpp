#include <iostream>
#include <string>
#include <vector>

#include "fsqkd/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return fsqkd::run_cli(args, std::cout, std::cerr, fsqkd::process_environment());
}
