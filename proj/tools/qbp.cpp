#include <qbp/harness/cli.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    qbp::harness::configureLogging();
    return qbp::harness::cliMain(argc, argv, std::cin, std::cout, std::cerr);
}
