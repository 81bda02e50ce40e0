#include "nsrl/harness.hpp"

int main(int argc, char** argv) { return nsrl::nsrl_main(argc, argv); }
