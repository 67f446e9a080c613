#include "flucast/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return flucast::cli_main(argc, argv, std::cout, std::cerr);
}
