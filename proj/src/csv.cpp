#include "insitu/csv.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace insitu::csv {

namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

}  // namespace

std::string num(double v)
{
    if (v == 0.0) {
        return "0";  // no "-0"
    }
    return fmt::format("{:.9g}", v);
}

std::size_t Table::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw std::runtime_error("csv column '" + name + "' not found");
}

std::string render(const Table& table)
{
    std::string out;
    const auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) {
        line(r);
    }
    return out;
}

void write(const std::filesystem::path& path, const Table& table)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << render(table);
}

Table read(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    Table t;
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path.string() + " is empty");
    }
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        t.rows.push_back(split(line));
        if (t.rows.back().size() != t.header.size()) {
            throw std::runtime_error(path.string() + ": row " + std::to_string(t.rows.size() + 1) +
                                     " has the wrong number of cells");
        }
    }
    return t;
}

}  // namespace insitu::csv
