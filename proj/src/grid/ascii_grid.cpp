#include "dfsim/grid/ascii_grid.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace dfsim::grid {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return s;
}

double parse_double(const std::string& token, const std::string& where) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw FormatError(where + ": cannot parse value '" + token + "'");
    }
    return value;
}

std::size_t parse_count(const std::string& token, const std::string& where) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || value < 1) {
        throw FormatError(where + ": expected a positive integer, got '" + token + "'");
    }
    return static_cast<std::size_t>(value);
}

}  // namespace

std::string format_double(double value) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

Raster read_ascii_grid(std::istream& in, const std::string& source_name) {
    GridHeader header;
    bool have_cols = false, have_rows = false, have_x = false, have_y = false, have_cell = false;
    bool x_center = false, y_center = false;

    std::string line;
    std::size_t line_no = 0;
    // Header lines are "<key> <value>"; the first line starting with a number ends the header.
    std::streampos data_start = in.tellg();
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string key, value, extra;
        if (!(ls >> key)) {
            data_start = in.tellg();
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(key[0])) || key[0] == '-' || key[0] == '+' || key[0] == '.') {
            break;
        }
        const std::string where = source_name + ":" + std::to_string(line_no);
        if (!(ls >> value) || (ls >> extra)) {
            throw FormatError(where + ": malformed header line '" + line + "'");
        }
        const std::string k = lower(key);
        if (k == "ncols") {
            header.cols = parse_count(value, where);
            have_cols = true;
        } else if (k == "nrows") {
            header.rows = parse_count(value, where);
            have_rows = true;
        } else if (k == "xllcorner" || k == "xllcenter") {
            header.origin_x = parse_double(value, where);
            x_center = k == "xllcenter";
            have_x = true;
        } else if (k == "yllcorner" || k == "yllcenter") {
            header.origin_y = parse_double(value, where);
            y_center = k == "yllcenter";
            have_y = true;
        } else if (k == "cellsize") {
            header.cellsize = parse_double(value, where);
            have_cell = true;
        } else if (k == "nodata_value") {
            header.nodata = parse_double(value, where);
        } else {
            throw FormatError(where + ": unknown header key '" + key + "'");
        }
        data_start = in.tellg();
    }
    if (!(have_cols && have_rows && have_x && have_y && have_cell)) {
        throw FormatError(source_name + ": incomplete header (need ncols, nrows, xllcorner, yllcorner, cellsize)");
    }
    if (!(header.cellsize > 0.0)) {
        throw FormatError(source_name + ": cellsize must be positive");
    }
    if (x_center) header.origin_x -= 0.5 * header.cellsize;
    if (y_center) header.origin_y -= 0.5 * header.cellsize;

    in.clear();
    in.seekg(data_start);
    std::vector<double> values;
    values.reserve(header.size());
    std::size_t row = 0;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string token;
        std::size_t count = 0;
        while (ls >> token) {
            values.push_back(parse_double(token, source_name + " row " + std::to_string(row)));
            ++count;
        }
        if (count == 0) {
            continue;
        }
        if (count != header.cols) {
            throw FormatError(source_name + ": row " + std::to_string(row) + " has " + std::to_string(count) +
                              " values but ncols=" + std::to_string(header.cols));
        }
        ++row;
    }
    if (row != header.rows) {
        throw FormatError(source_name + ": found " + std::to_string(row) + " rows but nrows=" +
                          std::to_string(header.rows));
    }
    Raster raster(header, std::move(values));
    raster.validate();
    return raster;
}

Raster read_ascii_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open grid file " + path.string());
    }
    return read_ascii_grid(in, path.string());
}

void write_ascii_grid(const Raster& raster, std::ostream& out) {
    const GridHeader& h = raster.header();
    out << "ncols " << h.cols << '\n'
        << "nrows " << h.rows << '\n'
        << "xllcorner " << format_double(h.origin_x) << '\n'
        << "yllcorner " << format_double(h.origin_y) << '\n'
        << "cellsize " << format_double(h.cellsize) << '\n'
        << "NODATA_value " << format_double(h.nodata) << '\n';
    std::string row_text;
    std::array<char, 32> buf{};
    for (std::size_t r = 0; r < h.rows; ++r) {
        row_text.clear();
        for (std::size_t c = 0; c < h.cols; ++c) {
            if (c) row_text.push_back(' ');
            auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), raster(r, c));
            row_text.append(buf.data(), ptr);
        }
        row_text.push_back('\n');
        out << row_text;
    }
}

void write_ascii_grid(const Raster& raster, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write grid file " + path.string());
    }
    write_ascii_grid(raster, out);
    if (!out) {
        throw FormatError("write failed for " + path.string());
    }
}

BinaryRaster read_binary_grid(const std::filesystem::path& path) {
    return to_binary(read_ascii_grid(path));
}

void write_binary_grid(const BinaryRaster& raster, const std::filesystem::path& path) {
    write_ascii_grid(to_real(raster), path);
}

}  // namespace dfsim::grid
