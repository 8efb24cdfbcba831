#include "ibival/cli.hpp"

int main(int argc, char** argv) { return ibival::cli::run(argc, argv); }
