#include "protojoint/cli.hpp"

int main(int argc, char** argv) { return protojoint::dispatch(argc, argv); }
