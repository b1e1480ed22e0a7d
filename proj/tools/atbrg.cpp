#include "atbrg/cli.hpp"

int main(int argc, char** argv) { return atbrg::run_cli(argc, argv); }
