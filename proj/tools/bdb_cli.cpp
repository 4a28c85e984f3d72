#include <iostream>
#include <string>
#include <vector>

#include "bdb/client.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return bdb::run_cli(args, std::cout, std::cerr);
}
