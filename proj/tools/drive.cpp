#include "drive/cli.hpp"

int main(int argc, char** argv) { return drive::cli_dispatch(argc, argv); }
