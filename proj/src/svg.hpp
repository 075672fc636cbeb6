#pragma once

#include <Eigen/Dense>
#include <sstream>
#include <string>
#include <vector>

namespace lcep::bench {

/// Minimal standalone-SVG plot surface with a fixed data viewport.
class SvgPlot {
  public:
    SvgPlot(double x0, double x1, double y0, double y1, int width = 720, int height = 520);

    void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& stroke, double stroke_width = 1.5);
    void vline(double x, const std::string& stroke);
    void rect(double x0, double x1, double y0, double y1, const std::string& fill);
    /// Covariance ellipse at k standard deviations, drawn as a closed path.
    void cov_ellipse(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov, double k,
                     const std::string& stroke);
    void label(double x, double y, const std::string& text, const std::string& fill = "#333333");
    void axes(const std::string& x_name, const std::string& y_name);

    std::string finish() const;

  private:
    double px(double x) const;
    double py(double y) const;

    double x0_, x1_, y0_, y1_;
    int w_, h_;
    int margin_ = 48;
    std::ostringstream body_;
};

}  // namespace lcep::bench
