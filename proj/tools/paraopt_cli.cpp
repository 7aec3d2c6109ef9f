#include "paraopt/cli.hpp"

int main(int argc, char** argv) { return paraopt::cli::run(argc, argv); }
