#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace canard::io {

// 17 significant digits, scientific
std::string fmt(double v);

class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);

private:
    std::ostream& os_;
    std::size_t cols_;
};

} // namespace canard::io
