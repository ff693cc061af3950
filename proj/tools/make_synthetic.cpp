#include <fstream>
#include <iostream>

#include "fgplab/backtest.hpp"

int main(int argc, char** argv) {
  const std::string out = argc > 1 ? argv[1] : "synthetic_two_stock.csv";
  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  if (!file) {
    std::cerr << "cannot write " << out << "\n";
    return 2;
  }
  fgplab::write_prices(file, fgplab::synthetic_two_stock_series());
  return 0;
}
