#include <iostream>
#include <string>
#include <vector>

#include "spstop/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return spstop::cli::run_command(args, std::cout, std::cerr).exit_code;
}
