#include "wdp/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "wdp/error.hpp"
#include "wdp/png_io.hpp"
#include "wdp/rng.hpp"

namespace wdp::data {

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (const auto& s : samples) ++counts.at(s.label);
    return counts;
}

std::size_t Dataset::class_index(const std::string& name) const {
    const auto it = std::find(class_names.begin(), class_names.end(), name);
    if (it == class_names.end()) {
        std::string known;
        for (const auto& c : class_names) known += (known.empty() ? "" : ", ") + c;
        throw DataError("class '" + name + "' is unregistered (known: " + known + ")");
    }
    return static_cast<std::size_t>(it - class_names.begin());
}

void Dataset::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& s : samples) {
        if (s.label >= class_names.size())
            throw DataError("sample '" + s.id + "' has label " + std::to_string(s.label) + " outside the class list");
        if (!seen.insert(s.id).second) throw DataError("duplicate sample id '" + s.id + "'");
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char ch : value) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return out + "\"";
}

}  // namespace

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) return {};
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "filename,class")
        throw DataError("manifest '" + path.string() + "' must start with the header 'filename,class'");
    std::vector<ManifestRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw DataError("manifest '" + path.string() + "' line " + std::to_string(lineno) +
                            ": expected 2 fields, got " + std::to_string(fields.size()));
        rows.push_back({std::move(fields[0]), std::move(fields[1])});
    }
    return rows;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write manifest '" + path.string() + "'");
    out << "filename,class\n";
    for (const auto& r : rows) out << csv_field(r.filename) << ',' << csv_field(r.class_name) << '\n';
    if (!out) throw DataError("failed writing manifest '" + path.string() + "'");
}

Dataset ingest_directory(const std::filesystem::path& dir, const std::filesystem::path& manifest,
                         const std::string& source) {
    const std::string tag = source.empty() ? std::filesystem::absolute(dir).lexically_normal().filename().string() : source;
    Dataset ds;
    for (const auto& row : read_manifest(manifest)) {
        Sample s;
        s.id = row.filename;
        s.source = tag;
        try {
            s.label = ds.class_index(row.class_name);
            s.image = read_png(dir / row.filename);
        } catch (const DataError& e) {
            throw DataError("ingest failed for '" + row.filename + "': " + e.what());
        }
        ds.samples.push_back(std::move(s));
    }
    ds.validate();
    return ds;
}

Dataset ingest_directory(const std::filesystem::path& dir) { return ingest_directory(dir, dir / "manifest.csv"); }

Dataset merge_datasets(const std::vector<Dataset>& parts) {
    if (parts.empty()) return Dataset{};
    if (parts.size() == 1) return parts.front();
    Dataset merged;
    merged.class_names = parts.front().class_names;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        if (parts[p].class_names != merged.class_names)
            throw DataError("cannot merge part " + std::to_string(p) + ": class list differs from part 0");
        for (const auto& s : parts[p].samples) {
            Sample copy = s;
            copy.id = s.source + "/" + s.id;
            merged.samples.push_back(std::move(copy));
        }
    }
    merged.validate();
    return merged;
}

std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& mix) {
    if (mix.empty()) throw ConfigError("class mix is empty");
    double total = 0.0;
    for (double m : mix) {
        if (!(m >= 0.0) || !std::isfinite(m)) throw ConfigError("class mix entries must be finite and >= 0");
        total += m;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("class mix must sum to 1 (got " + std::to_string(total) + ")");

    std::vector<std::size_t> counts(mix.size());
    std::vector<double> remainder(mix.size());
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < mix.size(); ++c) {
        const double quota = static_cast<double>(n) * mix[c];
        counts[c] = static_cast<std::size_t>(std::floor(quota));
        remainder[c] = quota - std::floor(quota);
        assigned += counts[c];
    }
    std::vector<std::size_t> order(mix.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % order.size()]];
    return counts;
}

namespace {

struct Point {
    double x, y;
};

bool inside_polygon(const std::vector<Point>& poly, Point p) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const auto& a = poly[i];
        const auto& b = poly[j];
        if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
    }
    return in;
}

// Fills a polygon given in unit local coordinates, placed with scale, rotation and centre.
// `anchor` is a local point known to lie inside the shape; its pixel is painted if
// the raster pass hits no pixel centre.
void fill_polygon(Tensor& img, const std::vector<Point>& local, Point anchor, double scale, double angle, Point centre,
                  double value) {
    const std::size_t h = img.dim(1), w = img.dim(2);
    const double c = std::cos(angle), s = std::sin(angle);
    bool drawn = false;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const double dx = x + 0.5 - centre.x, dy = y + 0.5 - centre.y;
            const Point q{(c * dx + s * dy) / scale, (-s * dx + c * dy) / scale};
            if (inside_polygon(local, q)) {
                img.at(0, y, x) = value;
                drawn = true;
            }
        }
    if (!drawn) {
        const double px = centre.x + scale * (c * anchor.x - s * anchor.y);
        const double py = centre.y + scale * (s * anchor.x + c * anchor.y);
        const auto cx = static_cast<std::size_t>(std::clamp(px, 0.0, static_cast<double>(w - 1)));
        const auto cy = static_cast<std::size_t>(std::clamp(py, 0.0, static_cast<double>(h - 1)));
        img.at(0, cy, cx) = value;
    }
}

void fill_disc(Tensor& img, Point centre, double radius, double value) {
    const std::size_t h = img.dim(1), w = img.dim(2);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const double dx = x + 0.5 - centre.x, dy = y + 0.5 - centre.y;
            if (dx * dx + dy * dy <= radius * radius) img.at(0, y, x) = value;
        }
}

const std::vector<Point>& gun_outline() {
    // Barrel along the top, grip hanging from the rear end.
    static const std::vector<Point> pts{{-0.5, -0.25}, {0.5, -0.25}, {0.5, -0.05},
                                        {-0.25, -0.05}, {-0.25, 0.35}, {-0.5, 0.35}};
    return pts;
}

const std::vector<Point>& knife_outline() {
    static const std::vector<Point> pts{{-0.5, -0.07}, {0.5, 0.0}, {-0.5, 0.07}};
    return pts;
}

Tensor render(std::size_t label, std::size_t canvas, SplitMix64& rng) {
    Tensor img({1, canvas, canvas});
    for (auto& v : img.data()) v = static_cast<double>(rng.range(0, 51));
    const double size = static_cast<double>(canvas);
    const auto intensity = [&] { return static_cast<double>(rng.range(150, 255)); };
    const auto centre = [&] { return Point{rng.uniform(0.3, 0.7) * size, rng.uniform(0.3, 0.7) * size}; };
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    switch (label) {
        case 1:
        case 2: {
            const bool gun = label == 1;
            const double scale = (gun ? rng.uniform(0.55, 0.8) : rng.uniform(0.6, 0.85)) * size;
            const Point at = centre();
            const double value = intensity();
            if (gun)
                fill_polygon(img, gun_outline(), {0.0, -0.15}, scale, angle, at, value);
            else
                fill_polygon(img, knife_outline(), {-0.2, 0.0}, scale, angle, at, value);
            break;
        }
        default: {
            const auto discs = rng.range(1, 3);
            for (std::int64_t d = 0; d < discs; ++d) {
                const Point at = centre();
                const double radius = rng.uniform(0.05, 0.11) * size;
                fill_disc(img, at, radius, intensity());
            }
        }
    }
    return img;
}

}  // namespace

Dataset synth_generate(const SynthOptions& options) {
    if (options.n < 1) throw ConfigError("synth.n must be >= 1");
    if (options.canvas < 16) throw ConfigError("synth.canvas must be >= 16 (shapes are unrenderable below that)");
    Dataset ds;
    if (options.mix.size() != ds.class_names.size())
        throw ConfigError("synth.mix needs one proportion per class (" + std::to_string(ds.class_names.size()) + ")");
    const auto counts = apportion(options.n, options.mix);

    std::vector<std::size_t> labels;
    for (std::size_t c = 0; c < counts.size(); ++c) labels.insert(labels.end(), counts[c], c);
    SplitMix64 order_rng(derive_seed(options.seed, 0x4F52444552ULL));
    order_rng.shuffle(std::span<std::size_t>(labels));

    const int width = std::max<int>(6, static_cast<int>(std::to_string(options.n).size()));
    ds.samples.reserve(options.n);
    for (std::size_t i = 0; i < options.n; ++i) {
        SplitMix64 rng(derive_seed(options.seed, i + 1));
        std::ostringstream id;
        id << "synth_" << std::setw(width) << std::setfill('0') << i;
        ds.samples.push_back({id.str(), render(labels[i], options.canvas, rng), labels[i], "SYN"});
    }
    return ds;
}

void export_dataset(const Dataset& dataset, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create '" + out_dir.string() + "': " + ec.message());
    std::vector<ManifestRow> rows;
    rows.reserve(dataset.size());
    for (const auto& s : dataset.samples) {
        std::string file = s.id + ".png";
        std::replace(file.begin(), file.end(), '/', '_');
        write_png(out_dir / file, s.image);
        rows.push_back({file, dataset.class_names.at(s.label)});
    }
    write_manifest(out_dir / "manifest.csv", rows);
}

}  // namespace wdp::data
