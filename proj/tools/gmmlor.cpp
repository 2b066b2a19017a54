#include "gmmlor/cli.hpp"

int main(int argc, char** argv) { return gmmlor::cli::run(argc, argv); }
