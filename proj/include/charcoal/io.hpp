#pragma once

#include <iosfwd>
#include <string>

#include "charcoal/sketch.hpp"

namespace charcoal {

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

// Reads a data CSV: header x1,...,xp,y and one row of p+1 finite numbers per
// time point. Throws ParseError with the 1-based line and column of the
// offending cell. Blank trailing lines and CRLF endings are accepted.
RegressionData read_csv(std::istream& in);
RegressionData read_csv_file(const std::string& path);

void write_csv(std::ostream& out, const RegressionData& data);
void write_csv_file(const std::string& path, const RegressionData& data);

}  // namespace charcoal
