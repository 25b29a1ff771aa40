#pragma once

#include <string>
#include <vector>

namespace gransformer {

// Minimal static markup: axis lines, grouped bars for the two series, a
// title, and a legend. Output depends only on the arguments, so repeated
// renders are byte-identical.
std::string svg_bar_chart(const std::string& title,
                          const std::vector<double>& series_a,
                          const std::string& label_a,
                          const std::vector<double>& series_b,
                          const std::string& label_b);

}  // namespace gransformer
