#include "mtat/cli.hpp"

int main(int argc, char** argv) { return mtat::cli_dispatch(argc, argv); }
