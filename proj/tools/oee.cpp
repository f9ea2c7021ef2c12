#include "oee/cli.hpp"

int main(int argc, char** argv) { return oee::cli::dispatch(argc, argv); }
