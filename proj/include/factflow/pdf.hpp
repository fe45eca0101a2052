#pragma once

#include <string>
#include <string_view>

#include "factflow/chart.hpp"

namespace factflow::pdf {

// Single-page PDF 1.4 drawing of the scene with the base-14 Helvetica font.
// No timestamps or ids, so equal scenes give equal bytes.
std::string write(const chart::Scene& scene);

// UTF-8 to WinAnsi bytes; characters outside the code page become '?'.
std::string to_win_ansi(std::string_view utf8);

}  // namespace factflow::pdf
