// Copyright 2026 The ViP Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "vip/evaluation.hpp"

namespace vip {

namespace {

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string RenderBarChartSvg(const std::string& title, std::span<const std::string> labels,
                              std::span<const double> values) {
  constexpr int kLabelWidth = 360;
  constexpr int kBarWidth = 300;  // full scale for |value| = 1
  constexpr int kRow = 22;
  constexpr int kTop = 40;
  const int height = kTop + static_cast<int>(labels.size()) * kRow + 20;
  const int width = kLabelWidth + 2 * kBarWidth + 80;
  const int zero_x = kLabelWidth + kBarWidth;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"10\" y=\"22\" font-size=\"14\">" << Escape(title) << "</text>\n";
  svg << "<line x1=\"" << zero_x << "\" y1=\"" << kTop - 6 << "\" x2=\"" << zero_x << "\" y2=\""
      << height - 14 << "\" stroke=\"#444\"/>\n";
  for (std::size_t i = 0; i < labels.size() && i < values.size(); ++i) {
    const int y = kTop + static_cast<int>(i) * kRow;
    const double v = std::clamp(values[i], -1.0, 1.0);
    const int len = static_cast<int>(std::abs(v) * kBarWidth);
    const int x = v >= 0 ? zero_x : zero_x - len;
    char value_text[32];
    std::snprintf(value_text, sizeof(value_text), "%.4f", values[i]);
    svg << "<text x=\"" << kLabelWidth - 6 << "\" y=\"" << y + 14 << "\" text-anchor=\"end\">"
        << Escape(labels[i]) << "</text>\n";
    svg << "<rect x=\"" << x << "\" y=\"" << y + 3 << "\" width=\"" << len << "\" height=\"" << kRow - 6
        << "\" fill=\"" << (v >= 0 ? "#3b75af" : "#c44e52") << "\"/>\n";
    svg << "<text x=\"" << zero_x + kBarWidth + 8 << "\" y=\"" << y + 14 << "\">" << value_text << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace vip
