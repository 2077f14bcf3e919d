#include "gridaimd/harness.hpp"

int main(int argc, char** argv) { return gridaimd::cli_dispatch(argc, argv); }
