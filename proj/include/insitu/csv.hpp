#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace insitu::csv {

/// 9 significant digits, the fixed rendering of every number we write.
std::string num(double v);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws std::runtime_error when absent.
    [[nodiscard]] std::size_t column(const std::string& name) const;
};

void write(const std::filesystem::path& path, const Table& table);
std::string render(const Table& table);

/// Reads a plain comma-separated file with a header line. No quoting.
Table read(const std::filesystem::path& path);

}  // namespace insitu::csv
