#include "rffcd/streams.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rffcd {

namespace {

std::vector<double> broadcast(std::size_t dim, double v) { return std::vector<double>(dim, v); }

void check_vector(const std::vector<double>& v, std::size_t dim, const char* what) {
    if (v.size() != dim)
        throw std::invalid_argument(std::string("DistributionSpec: ") + what + " has wrong length");
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof buf, v[i]);
        if (i) out += ' ';
        out.append(buf, res.ptr);
    }
    return out;
}

}  // namespace

DistributionSpec DistributionSpec::standard_gaussian(std::size_t dim) {
    return gaussian(broadcast(dim, 0.0), broadcast(dim, 1.0));
}

DistributionSpec DistributionSpec::gaussian(std::vector<double> mean, std::vector<double> scale) {
    DistributionSpec s;
    s.family = Family::gaussian;
    s.dim = mean.size();
    s.mean = std::move(mean);
    s.scale = std::move(scale);
    s.validate();
    return s;
}

DistributionSpec DistributionSpec::laplace(std::vector<double> mean, std::vector<double> scale) {
    DistributionSpec s = gaussian(std::move(mean), std::move(scale));
    s.family = Family::laplace;
    return s;
}

DistributionSpec DistributionSpec::uniform_cube(std::vector<double> mean,
                                                std::vector<double> half_side) {
    DistributionSpec s = gaussian(std::move(mean), std::move(half_side));
    s.family = Family::uniform;
    return s;
}

DistributionSpec DistributionSpec::two_component_mixture(std::size_t dim, double separation) {
    DistributionSpec s;
    s.family = Family::gaussian_mixture;
    s.dim = dim;
    s.weights = {0.5, 0.5};
    s.components.push_back({broadcast(dim, separation / 2.0), broadcast(dim, 1.0)});
    s.components.push_back({broadcast(dim, -separation / 2.0), broadcast(dim, 1.0)});
    s.validate();
    return s;
}

void DistributionSpec::validate() const {
    if (dim == 0) throw std::invalid_argument("DistributionSpec: dim must be positive");
    if (family == Family::gaussian_mixture) {
        if (components.empty() || components.size() != weights.size())
            throw std::invalid_argument("DistributionSpec: mixture needs matching weights/components");
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw std::invalid_argument("DistributionSpec: negative mixture weight");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("DistributionSpec: mixture weights must sum to 1");
        for (const auto& c : components) {
            check_vector(c.mean, dim, "component mean");
            check_vector(c.scale, dim, "component scale");
            for (double s : c.scale)
                if (!(s > 0.0)) throw std::invalid_argument("DistributionSpec: scale must be positive");
        }
        return;
    }
    check_vector(mean, dim, "mean");
    check_vector(scale, dim, "scale");
    for (double s : scale)
        if (!(s > 0.0)) throw std::invalid_argument("DistributionSpec: scale must be positive");
}

std::string DistributionSpec::describe() const {
    std::ostringstream out;
    switch (family) {
        case Family::gaussian: out << "gaussian"; break;
        case Family::laplace: out << "laplace"; break;
        case Family::uniform: out << "uniform"; break;
        case Family::gaussian_mixture: out << "gaussian-mixture"; break;
    }
    out << " d=" << dim;
    if (family == Family::gaussian_mixture) {
        for (std::size_t i = 0; i < components.size(); ++i)
            out << " w" << i << "=" << weights[i] << " mean" << i << "=[" << join(components[i].mean)
                << "] scale" << i << "=[" << join(components[i].scale) << "]";
    } else {
        out << " mean=[" << join(mean) << "] scale=[" << join(scale) << "]";
    }
    return out.str();
}

void ChangeStreamSpec::validate() const {
    pre.validate();
    post.validate();
    if (pre.dim != post.dim)
        throw std::invalid_argument("ChangeStreamSpec: pre/post dimension mismatch");
    if (change_index == 0)
        throw std::invalid_argument("ChangeStreamSpec: change index starts at 1");
}

void draw_point(const DistributionSpec& spec, Rng& rng, std::vector<double>& out) {
    out.clear();
    out.reserve(spec.dim);
    const std::vector<double>* mean = &spec.mean;
    const std::vector<double>* scale = &spec.scale;
    if (spec.family == Family::gaussian_mixture) {
        const double u = rng.uniform01();
        double cum = 0.0;
        std::size_t pick = spec.components.size() - 1;
        for (std::size_t i = 0; i < spec.weights.size(); ++i) {
            cum += spec.weights[i];
            if (u < cum) {
                pick = i;
                break;
            }
        }
        mean = &spec.components[pick].mean;
        scale = &spec.components[pick].scale;
    }
    for (std::size_t k = 0; k < spec.dim; ++k) {
        double z;
        switch (spec.family) {
            case Family::laplace: z = rng.laplace(); break;
            case Family::uniform: z = 2.0 * rng.uniform01() - 1.0; break;
            default: z = rng.normal(); break;
        }
        out.push_back((*mean)[k] + (*scale)[k] * z);
    }
}

std::vector<std::vector<double>> draw_stream(const ChangeStreamSpec& spec, std::size_t length) {
    spec.validate();
    if (length == 0) throw std::invalid_argument("draw_stream: length must be positive");
    Rng rng(spec.seed);
    std::vector<std::vector<double>> stream(length);
    for (std::size_t t = 1; t <= length; ++t)
        draw_point(t <= spec.change_index ? spec.pre : spec.post, rng, stream[t - 1]);
    return stream;
}

namespace {

bool parse_cell(std::string_view cell, double& out) {
    std::size_t lo = 0, hi = cell.size();
    while (lo < hi && (cell[lo] == ' ' || cell[lo] == '\t')) ++lo;
    while (hi > lo && (cell[hi - 1] == ' ' || cell[hi - 1] == '\t')) --hi;
    if (lo == hi) return false;
    const auto res = std::from_chars(cell.data() + lo, cell.data() + hi, out);
    return res.ec == std::errc() && res.ptr == cell.data() + hi;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

}  // namespace

std::vector<std::vector<double>> read_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool first_line = true;  // only the leading row may be a header
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        std::vector<double> row;
        row.reserve(fields.size());
        bool ok = true;
        std::size_t bad_col = 0;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double v;
            if (!parse_cell(fields[c], v)) {
                ok = false;
                bad_col = c + 1;
                break;
            }
            row.push_back(v);
        }
        if (!ok) {
            if (first_line) {
                first_line = false;
                continue;  // header row
            }
            throw std::runtime_error("read_csv: unparseable cell at row " + std::to_string(line_no) +
                                     ", column " + std::to_string(bad_col));
        }
        first_line = false;
        if (rows.empty()) {
            width = row.size();
        } else if (row.size() != width) {
            throw std::runtime_error("read_csv: ragged row " + std::to_string(line_no) + " has " +
                                     std::to_string(row.size()) + " fields, expected " +
                                     std::to_string(width));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::vector<double>> read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    return read_csv(in);
}

void write_csv(const std::vector<std::vector<double>>& rows, std::ostream& out) {
    char buf[32];
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            const auto res = std::to_chars(buf, buf + sizeof buf, row[i]);
            if (i) out << ',';
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

std::vector<std::vector<double>> read_idx(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_idx: cannot open " + path);
    unsigned char magic[4];
    if (!in.read(reinterpret_cast<char*>(magic), 4))
        throw std::runtime_error("read_idx: file shorter than the 4-byte magic");
    if (magic[0] != 0 || magic[1] != 0)
        throw std::runtime_error("read_idx: bad magic bytes");
    if (magic[2] != 0x08)
        throw std::runtime_error("read_idx: unsupported type code " + std::to_string(magic[2]) +
                                 " (only 0x08 unsigned byte)");
    const std::size_t ndims = magic[3];
    if (ndims == 0) throw std::runtime_error("read_idx: zero dimensions");

    std::vector<std::size_t> sizes(ndims);
    for (std::size_t i = 0; i < ndims; ++i) {
        unsigned char b[4];
        if (!in.read(reinterpret_cast<char*>(b), 4))
            throw std::runtime_error("read_idx: truncated dimension header");
        sizes[i] = (std::size_t(b[0]) << 24) | (std::size_t(b[1]) << 16) | (std::size_t(b[2]) << 8) |
                   std::size_t(b[3]);
    }
    const std::size_t count = sizes[0];
    std::size_t dim = 1;
    for (std::size_t i = 1; i < ndims; ++i) {
        if (sizes[i] != 0 && dim > SIZE_MAX / sizes[i])
            throw std::runtime_error("read_idx: dimension sizes overflow");
        dim *= sizes[i];
    }
    if (dim == 0) throw std::runtime_error("read_idx: zero-sized record dimension");
    if (count != 0 && dim > SIZE_MAX / count)
        throw std::runtime_error("read_idx: dimension sizes overflow");

    std::vector<unsigned char> payload(count * dim);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got != payload.size())
        throw std::runtime_error("read_idx: truncated payload, expected " +
                                 std::to_string(payload.size()) + " bytes, got " +
                                 std::to_string(got));

    std::vector<std::vector<double>> records(count);
    for (std::size_t i = 0; i < count; ++i) {
        records[i].resize(dim);
        for (std::size_t k = 0; k < dim; ++k)
            records[i][k] = static_cast<double>(payload[i * dim + k]) / 255.0;
    }
    return records;
}

}  // namespace rffcd
