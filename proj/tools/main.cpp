#include "omk/cli.hpp"

int main(int argc, char** argv) { return omk::run_cli(argc, argv); }
