#include "wadebench/cli.hpp"

int main(int argc, char** argv)
{
    return wadebench::cli::main(argc, argv);
}
