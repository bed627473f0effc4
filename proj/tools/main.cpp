#include "distil/cli.hpp"

int main(int argc, char** argv) { return distil::cli::run(argc, argv); }
