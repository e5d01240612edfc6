#pragma once

#include <vector>

#include "crrix/index.hpp"

namespace crrix::testing {

inline Date day(int y, unsigned m, unsigned d) { return Date(y, m, d); }

// Jan 1-20 one article per day, regulatory on 1,5,9,13,17.
// Feb 1-25 one per day, regulatory on even days 2..20.
// Mar 1-15 one per day, regulatory on 3,7,11.
inline std::vector<DatedArticle> sixty() {
  std::vector<DatedArticle> out;
  for (unsigned d = 1; d <= 20; ++d) out.push_back({day(2018, 1, d), d % 4 == 1});
  for (unsigned d = 1; d <= 25; ++d) out.push_back({day(2018, 2, d), d % 2 == 0 && d <= 20});
  for (unsigned d = 1; d <= 15; ++d) out.push_back({day(2018, 3, d), d == 3 || d == 7 || d == 11});
  return out;
}

}  // namespace crrix::testing
