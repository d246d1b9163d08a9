#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace geomsde::geometry {

// Chart coordinates of a manifold location. Ambient representation for
// sphere/hyperboloid, plain chart vector for Euclidean/pullback.
struct Point {
    Eigen::VectorXd x;
};

struct Tangent {
    Point base;
    Eigen::VectorXd v;
};

// Ordered orthonormal basis of T_x M; columns of `vectors` are basis vectors
// in the same representation as Point.
struct Frame {
    Point base;
    Eigen::MatrixXd vectors;
    int dim() const { return static_cast<int>(vectors.cols()); }
};

struct CurvatureBounds {
    double L_R = 0.0;
    double L_R_prime = 0.0;
    double L_R_double_prime = 0.0;
    double L_Ric = 0.0;
    double C_r = 0.0; // trivialization radius

    // C_r = (1/16) min{ L_R'^{-1/3}, 1/(8 sqrt(L_R)) }; infinite in flat space.
    static double derive_radius(double L_R, double L_R_prime);
    static CurvatureBounds derive(double L_R, double L_R_prime, double L_R_double_prime,
                                  double L_Ric);
};

// Coordinates of the curvature tensor and its covariant derivative wrt a
// frame: R[i][j][k][l] = <R(E_j, E_k) E_l, E_i>,
// dR[a][i][j][k][l] = <(nabla_{E_a} R)(E_j, E_k) E_l, E_i>.
struct Curvature {
    int d = 0;
    std::vector<double> R;
    std::vector<double> dR;

    explicit Curvature(int dim)
        : d(dim), R(static_cast<std::size_t>(dim) * dim * dim * dim, 0.0),
          dR(static_cast<std::size_t>(dim) * dim * dim * dim * dim, 0.0) {}
    double& r(int i, int j, int k, int l) { return R[((i * d + j) * d + k) * d + l]; }
    double r(int i, int j, int k, int l) const { return R[((i * d + j) * d + k) * d + l]; }
    double& dr(int a, int i, int j, int k, int l) {
        return dR[(((a * d + i) * d + j) * d + k) * d + l];
    }
    double dr(int a, int i, int j, int k, int l) const {
        return dR[(((a * d + i) * d + j) * d + k) * d + l];
    }
    bool is_zero_derivative() const;
};

class Manifold {
public:
    virtual ~Manifold() = default;

    virtual std::string name() const = 0;
    virtual int dim() const = 0;
    virtual int ambient_dim() const = 0;

    // Inner product of two representation vectors at x (Euclidean on the
    // sphere, Minkowski on the hyperboloid, metric-weighted on pullback).
    virtual double inner(const Point& x, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& b) const = 0;
    double norm(const Point& x, const Eigen::VectorXd& a) const;
    double norm(const Tangent& v) const { return norm(v.base, v.v); }

    virtual Point exp(const Point& x, const Tangent& v) const = 0;
    virtual Tangent log(const Point& x, const Point& y) const = 0;
    virtual double distance(const Point& x, const Point& y) const = 0;
    virtual Tangent transport(const Tangent& v, const Point& x, const Point& y) const = 0;
    Frame transported_frame(const Frame& E, const Point& x, const Point& y) const;

    // Deterministic orthonormal frame at x.
    virtual Frame reference_frame(const Point& x) const = 0;

    // Canonical base point of the chart (zero vector / pole).
    virtual Point origin() const = 0;

    virtual Curvature curvature_coords(const Point& x, const Frame& E) const = 0;

    virtual double curvature_bound() const = 0; // L_R
    virtual double curvature_deriv_bound() const { return 0.0; }
    virtual double curvature_second_deriv_bound() const { return 0.0; }
    virtual double ricci_lower_bound() const { return 0.0; } // L_Ric
    CurvatureBounds curvature_bounds() const;

    // Whether nabla R vanishes identically (true for all built-in instances);
    // lets the Jacobi/trivialization kernels treat M(t;u) as constant in t.
    virtual bool parallel_curvature() const { return true; }

    // Renormalize to the chart constraint (unit / Minkowski norm); identity on
    // flat charts.
    virtual Point project(Point p) const { return p; }
    virtual double constraint_residual(const Point&) const { return 0.0; }

    // Margin below which log/transport refuse to operate (distance from the
    // cut locus); infinite when there is no cut locus.
    virtual double cut_locus_margin() const;

    Eigen::VectorXd frame_coords(const Frame& E, const Tangent& v) const;
    Tangent from_frame_coords(const Frame& E, const Eigen::VectorXd& c) const;
    double frame_gram_residual(const Frame& E) const;

    Tangent zero_tangent(const Point& x) const { return {x, Eigen::VectorXd::Zero(ambient_dim())}; }

protected:
    void check_base(const Point& x, const Tangent& v) const;
};

class EuclideanSpace final : public Manifold {
public:
    explicit EuclideanSpace(int d) : d_(d) {}
    std::string name() const override { return "euclidean"; }
    int dim() const override { return d_; }
    int ambient_dim() const override { return d_; }
    double inner(const Point&, const Eigen::VectorXd& a, const Eigen::VectorXd& b) const override {
        return a.dot(b);
    }
    Point exp(const Point& x, const Tangent& v) const override;
    Tangent log(const Point& x, const Point& y) const override;
    double distance(const Point& x, const Point& y) const override;
    Tangent transport(const Tangent& v, const Point& x, const Point& y) const override;
    Frame reference_frame(const Point& x) const override;
    Curvature curvature_coords(const Point& x, const Frame& E) const override;
    double curvature_bound() const override { return 0.0; }
    Point origin() const override { return {Eigen::VectorXd::Zero(d_)}; }

private:
    int d_;
};

// Sphere of radius `radius` in R^{d+1}; sectional curvature 1/radius^2.
class Sphere final : public Manifold {
public:
    explicit Sphere(int d, double radius = 1.0) : d_(d), radius_(radius) {}
    std::string name() const override { return "sphere"; }
    int dim() const override { return d_; }
    int ambient_dim() const override { return d_ + 1; }
    double radius() const { return radius_; }
    double inner(const Point&, const Eigen::VectorXd& a, const Eigen::VectorXd& b) const override {
        return a.dot(b);
    }
    Point exp(const Point& x, const Tangent& v) const override;
    Tangent log(const Point& x, const Point& y) const override;
    double distance(const Point& x, const Point& y) const override;
    Tangent transport(const Tangent& v, const Point& x, const Point& y) const override;
    Frame reference_frame(const Point& x) const override;
    Curvature curvature_coords(const Point& x, const Frame& E) const override;
    double curvature_bound() const override { return 1.0 / (radius_ * radius_); }
    Point project(Point p) const override;
    double constraint_residual(const Point& p) const override;
    double cut_locus_margin() const override { return M_PI * radius_ - 1e-6; }
    Point base_point() const;
    Point origin() const override { return base_point(); }

private:
    int d_;
    double radius_;
};

// Hyperboloid model in R^{d+1} with Minkowski form sum_i<d a_i b_i - a_d b_d;
// constraint <x,x>_M = -radius^2, x_d > 0. Sectional curvature -1/radius^2.
class Hyperboloid final : public Manifold {
public:
    explicit Hyperboloid(int d, double radius = 1.0) : d_(d), radius_(radius) {}
    std::string name() const override { return "hyperboloid"; }
    int dim() const override { return d_; }
    int ambient_dim() const override { return d_ + 1; }
    double radius() const { return radius_; }
    double minkowski(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
    double inner(const Point&, const Eigen::VectorXd& a, const Eigen::VectorXd& b) const override {
        return minkowski(a, b);
    }
    Point exp(const Point& x, const Tangent& v) const override;
    Tangent log(const Point& x, const Point& y) const override;
    double distance(const Point& x, const Point& y) const override;
    Tangent transport(const Tangent& v, const Point& x, const Point& y) const override;
    Frame reference_frame(const Point& x) const override;
    Curvature curvature_coords(const Point& x, const Frame& E) const override;
    double curvature_bound() const override { return 1.0 / (radius_ * radius_); }
    double ricci_lower_bound() const override {
        return static_cast<double>(d_ - 1) / (radius_ * radius_);
    }
    Point project(Point p) const override;
    double constraint_residual(const Point& p) const override;
    Point base_point() const;
    Point origin() const override { return base_point(); }

private:
    int d_;
    double radius_;
};

std::unique_ptr<Manifold> make_manifold(const std::string& kind, int dim, double scale);

} // namespace geomsde::geometry
