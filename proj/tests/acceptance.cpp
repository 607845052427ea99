#include <iostream>

#include "monodromy/acceptance.hpp"

int main() {
  monodromy::AcceptanceSuite suite;
  auto results = suite.run(std::cout);
  return monodromy::AcceptanceSuite::all_pass(results) ? 0 : 1;
}
