#include "heatpack/grid.hpp"

#include "heatpack/error.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace heatpack {

double BoxDomain::volume() const
{
    double v = 1.0;
    for (int k = 0; k < dim; ++k)
        v *= extent(k);
    return v;
}

bool BoxDomain::contains(const Point& x) const
{
    for (int k = 0; k < dim; ++k)
        if (x[k] < lo[k] || x[k] > hi[k])
            return false;
    return true;
}

double BoxDomain::distance_to_boundary(const Point& y) const
{
    double d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < dim; ++k)
        d = std::min({d, y[k] - lo[k], hi[k] - y[k]});
    return d;
}

Point BoxDomain::center() const
{
    Point c{};
    for (int k = 0; k < dim; ++k)
        c[k] = 0.5 * (lo[k] + hi[k]);
    return c;
}

void BoxDomain::validate() const
{
    if (dim < 1 || dim > kMaxDim)
        fail(ErrorKind::ConfigError, "dimension must be 1 or 2");
    for (int k = 0; k < dim; ++k)
        if (!(hi[k] > lo[k]))
            fail(ErrorKind::ConfigError, "empty box domain");
}

template <class T>
GridField<T>::GridField(const BoxDomain& d, const Resolution& r, T fill) : domain(d), res(r)
{
    std::size_t n = 1;
    for (int k = 0; k < d.dim; ++k) {
        if (r[k] < 1)
            fail(ErrorKind::ConfigError, "grid resolution must be positive");
        n *= static_cast<std::size_t>(r[k]);
    }
    for (int k = d.dim; k < kMaxDim; ++k)
        res[k] = 1;
    values.assign(n, fill);
}

template <class T>
double GridField<T>::cell_volume() const
{
    double v = 1.0;
    for (int k = 0; k < domain.dim; ++k)
        v *= h(k);
    return v;
}

template <class T>
std::array<int, kMaxDim> GridField<T>::unflatten(std::size_t flat) const
{
    std::array<int, kMaxDim> idx{};
    for (int k = domain.dim - 1; k >= 0; --k) {
        idx[k] = static_cast<int>(flat % res[k]);
        flat /= res[k];
    }
    return idx;
}

template <class T>
std::size_t GridField<T>::flatten(const std::array<int, kMaxDim>& idx) const
{
    std::size_t flat = 0;
    for (int k = 0; k < domain.dim; ++k)
        flat = flat * res[k] + idx[k];
    return flat;
}

template <class T>
Point GridField<T>::center(std::size_t flat) const
{
    const auto idx = unflatten(flat);
    Point x{};
    for (int k = 0; k < domain.dim; ++k)
        x[k] = domain.lo[k] + (idx[k] + 0.5) * h(k);
    return x;
}

template <class T>
bool GridField<T>::is_boundary_cell(std::size_t flat) const
{
    const auto idx = unflatten(flat);
    for (int k = 0; k < domain.dim; ++k)
        if (idx[k] == 0 || idx[k] == res[k] - 1)
            return true;
    return false;
}

template struct GridField<double>;
template struct GridField<cplx>;

Resolution uniform_resolution(int dim, int n)
{
    Resolution r{};
    for (int k = 0; k < kMaxDim; ++k)
        r[k] = k < dim ? n : 1;
    return r;
}

double integrate(const RealField& f)
{
    double s = 0.0;
    for (double v : f.values)
        s += v;
    return s * f.cell_volume();
}

double norm2(const ComplexField& f)
{
    double s = 0.0;
    for (const cplx& v : f.values)
        s += std::norm(v);
    return s * f.cell_volume();
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string join(const std::vector<std::string>& parts)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i)
            out += ',';
        out += parts[i];
    }
    return out;
}

template <class T>
std::string header(const GridField<T>& f, const char* kind)
{
    std::vector<std::string> r, lo, hi;
    for (int k = 0; k < f.dim(); ++k) {
        r.push_back(std::to_string(f.res[k]));
        lo.push_back(format_double(f.domain.lo[k]));
        hi.push_back(format_double(f.domain.hi[k]));
    }
    return "HPGRID d=" + std::to_string(f.dim()) + " res=" + join(r) + " lo=" + join(lo) +
           " hi=" + join(hi) + " kind=" + kind + "\n";
}

struct Header {
    BoxDomain domain;
    Resolution res{1, 1};
    std::string kind;
};

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        out.push_back(cur);
    return out;
}

double parse_double(const std::string& s)
{
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        fail(ErrorKind::IoError, "bad number '" + s + "'");
    }
    if (pos != s.size())
        fail(ErrorKind::IoError, "bad number '" + s + "'");
    return v;
}

Header parse_header(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        fail(ErrorKind::IoError, "empty grid file");
    std::istringstream hs(line);
    std::string magic;
    hs >> magic;
    if (magic != "HPGRID")
        fail(ErrorKind::IoError, "missing HPGRID header");
    Header h;
    std::string tok;
    std::vector<std::string> res, lo, hi;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::IoError, "bad header token '" + tok + "'");
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "d")
            h.domain.dim = std::stoi(val);
        else if (key == "res")
            res = split(val, ',');
        else if (key == "lo")
            lo = split(val, ',');
        else if (key == "hi")
            hi = split(val, ',');
        else if (key == "kind")
            h.kind = val;
        else
            fail(ErrorKind::IoError, "unknown header key '" + key + "'");
    }
    const int d = h.domain.dim;
    if (d < 1 || d > kMaxDim || static_cast<int>(res.size()) != d ||
        static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d)
        fail(ErrorKind::IoError, "inconsistent grid header");
    for (int k = 0; k < d; ++k) {
        h.res[k] = std::stoi(res[k]);
        h.domain.lo[k] = parse_double(lo[k]);
        h.domain.hi[k] = parse_double(hi[k]);
    }
    h.domain.validate();
    return h;
}

} // namespace

std::string to_hpgrid(const RealField& f)
{
    std::string out = header(f, "real");
    for (double v : f.values) {
        out += format_double(v);
        out += '\n';
    }
    return out;
}

std::string to_hpgrid(const ComplexField& f)
{
    std::string out = header(f, "complex");
    for (const cplx& v : f.values) {
        out += format_double(v.real());
        out += ' ';
        out += format_double(v.imag());
        out += '\n';
    }
    return out;
}

RealField real_from_hpgrid(const std::string& text)
{
    std::istringstream in(text);
    Header h = parse_header(in);
    if (h.kind != "real")
        fail(ErrorKind::IoError, "expected a real grid");
    RealField f(h.domain, h.res);
    std::string line;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!std::getline(in, line))
            fail(ErrorKind::IoError, "grid file truncated");
        f[i] = parse_double(line);
    }
    return f;
}

ComplexField complex_from_hpgrid(const std::string& text)
{
    std::istringstream in(text);
    Header h = parse_header(in);
    if (h.kind != "complex")
        fail(ErrorKind::IoError, "expected a complex grid");
    ComplexField f(h.domain, h.res);
    std::string line;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!std::getline(in, line))
            fail(ErrorKind::IoError, "grid file truncated");
        const auto sp = line.find(' ');
        if (sp == std::string::npos)
            fail(ErrorKind::IoError, "complex sample needs two numbers");
        f[i] = cplx(parse_double(line.substr(0, sp)), parse_double(line.substr(sp + 1)));
    }
    return f;
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorKind::IoError, "cannot write " + path);
    out << text;
}

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::IoError, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string to_pgm(const RealField& f)
{
    const int w = f.res[0];
    const int h = f.dim() >= 2 ? f.res[1] : 1;
    std::string out = "P2\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    for (int row = 0; row < h; ++row) {
        const int j = h - 1 - row;
        for (int i = 0; i < w; ++i) {
            std::array<int, kMaxDim> idx{};
            idx[0] = i;
            if (f.dim() >= 2)
                idx[1] = j;
            const double v = std::clamp(f[f.flatten(idx)], 0.0, 1.0);
            out += std::to_string(static_cast<int>(std::lround(255.0 * v)));
            out += i + 1 < w ? ' ' : '\n';
        }
    }
    return out;
}

} // namespace heatpack
