#include "taucover/report.hpp"

#include <cstdlib>
#include <sstream>
#include <string>

namespace taucover {

std::string cell_label(int a, int p, int b, int q) {
  std::ostringstream s;
  s << "(" << a + 1 << "," << p << ";" << b + 1 << "," << q << ")";
  return s.str();
}

void add_cells(Report& r, const std::string& name, const std::vector<std::string>& cells, const std::string& ctx) {
  int count = 0;
  std::string list;
  for (const auto& c : cells) {
    if (c.empty()) continue;
    if (count < 8) list += (list.empty() ? "" : " ") + c;
    ++count;
  }
  r.add(name, count == 0, count, count == 0 ? ctx : ctx + "; failing " + list);
}

unsigned worker_count() {
  if (const char* env = std::getenv("TAUCOVER_THREADS")) {
    try {
      int k = std::stoi(env);
      if (k > 0) return static_cast<unsigned>(k);
    } catch (...) {
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace taucover
