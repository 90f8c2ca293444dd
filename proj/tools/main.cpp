#include "biwhiten/cli.hpp"

int main(int argc, char** argv) { return biwhiten::cli_main(argc, argv); }
