#include "symreg/cli.hpp"

int main(int argc, char** argv) { return symreg::cli::run(argc, argv); }
