#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lcep/bench.hpp"
#include "svg.hpp"

namespace lcep::bench {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& body) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << body;
}

SvgPlot::SvgPlot(double x0, double x1, double y0, double y1, int width, int height)
    : x0_(x0), x1_(x1), y0_(y0), y1_(y1), w_(width), h_(height) {}

double SvgPlot::px(double x) const {
    return margin_ + (x - x0_) / (x1_ - x0_) * (w_ - 2 * margin_);
}

double SvgPlot::py(double y) const {
    return h_ - margin_ - (y - y0_) / (y1_ - y0_) * (h_ - 2 * margin_);
}

void SvgPlot::polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                       const std::string& stroke, double stroke_width) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
          << stroke_width << "\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i)
        body_ << fmt(px(xs[i])) << "," << fmt(py(ys[i])) << " ";
    body_ << "\"/>\n";
}

void SvgPlot::vline(double x, const std::string& stroke) {
    body_ << "<line x1=\"" << fmt(px(x)) << "\" y1=\"" << fmt(py(y0_)) << "\" x2=\"" << fmt(px(x))
          << "\" y2=\"" << fmt(py(y1_)) << "\" stroke=\"" << stroke
          << "\" stroke-dasharray=\"4 3\"/>\n";
}

void SvgPlot::rect(double x0, double x1, double y0, double y1, const std::string& fill) {
    body_ << "<rect x=\"" << fmt(px(x0)) << "\" y=\"" << fmt(py(y1)) << "\" width=\""
          << fmt(px(x1) - px(x0)) << "\" height=\"" << fmt(py(y0) - py(y1)) << "\" fill=\"" << fill
          << "\"/>\n";
}

void SvgPlot::cov_ellipse(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov, double k,
                          const std::string& stroke) {
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const Eigen::Vector2d scale = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt() * k;
    const Eigen::Matrix2d axes = eig.eigenvectors();
    std::vector<double> xs, ys;
    const int n = 120;
    for (int i = 0; i <= n; ++i) {
        const double t = 2.0 * M_PI * i / n;
        const Eigen::Vector2d p =
            mean + axes * Eigen::Vector2d(scale(0) * std::cos(t), scale(1) * std::sin(t));
        xs.push_back(p(0));
        ys.push_back(p(1));
    }
    polyline(xs, ys, stroke, 2.0);
}

void SvgPlot::label(double x, double y, const std::string& text, const std::string& fill) {
    body_ << "<text x=\"" << fmt(px(x)) << "\" y=\"" << fmt(py(y)) << "\" font-size=\"13\" "
          << "font-family=\"sans-serif\" fill=\"" << fill << "\">" << text << "</text>\n";
}

void SvgPlot::axes(const std::string& x_name, const std::string& y_name) {
    body_ << "<rect x=\"" << margin_ << "\" y=\"" << margin_ << "\" width=\"" << w_ - 2 * margin_
          << "\" height=\"" << h_ - 2 * margin_
          << "\" fill=\"none\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
    body_ << "<text x=\"" << w_ / 2 << "\" y=\"" << h_ - 12
          << "\" font-size=\"13\" font-family=\"sans-serif\" text-anchor=\"middle\">" << x_name
          << "</text>\n";
    body_ << "<text x=\"14\" y=\"" << h_ / 2
          << "\" font-size=\"13\" font-family=\"sans-serif\" text-anchor=\"middle\" "
          << "transform=\"rotate(-90 14 " << h_ / 2 << ")\">" << y_name << "</text>\n";
}

std::string SvgPlot::finish() const {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
        << "\" viewBox=\"0 0 " << w_ << " " << h_ << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
}

}  // namespace lcep::bench
