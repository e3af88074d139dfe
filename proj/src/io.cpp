#include "canard_lab/io.hpp"

#include <cstdio>
#include <stdexcept>

namespace canard::io {

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os), cols_(header.size())
{
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values)
{
    if (values.size() != cols_) throw std::invalid_argument("CsvWriter: column count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << fmt(values[i]);
    os_ << '\n';
}

} // namespace canard::io
