#include "fedconf/cli.hpp"

int main(int argc, char** argv) { return fedconf::cli_dispatch(argc, argv); }
