#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace canard {

using State = std::vector<double>;
// dx = f(t, x); the output buffer has the same length as x
using VectorField = std::function<void(double t, const double* x, double* dx)>;

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Tolerances {
    double abs_tol = 1e-11;
    double rel_tol = 1e-11;
    double newton_tol = 1e-10;
    int newton_max_iter = 30;
    double event_tol = 1e-12;
    long max_steps = 2000000;

    void validate() const;
};

class Trajectory {
public:
    explicit Trajectory(int dim = 0) : dim_(dim) {}

    int dim() const { return dim_; }
    std::size_t size() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<State>& states() const { return states_; }
    const State& back() const { return states_.back(); }

    // dense evaluation anywhere in the integrated span
    State eval(double t) const;
    double t_begin() const { return times_.front(); }
    double t_end() const { return times_.back(); }

    void push_start(double t, const State& x);
    // one accepted step: coefficient blocks of the continuous extension
    void push_step(double t1, const State& x1, std::vector<double> cont);
    // drop everything after t (dense-cut at an event)
    void truncate_at(double t);

private:
    std::size_t segment(double t) const;
    int dim_;
    std::vector<double> times_;
    std::vector<State> states_;
    std::vector<std::vector<double>> cont_;   // 5*dim per step
};

struct SectionSpec {
    std::function<double(const double* x)> g;
    int direction = 0;   // +1, -1, 0 = any; measured along the traversal
};

struct IntegrateOptions {
    double h0 = 0.0;          // initial step guess, 0 = automatic
    double h_max = 0.0;       // 0 = unlimited
    double t_ignore = 0.0;    // events closer than this to the start are ignored
    // returns true if the state left the admissible region
    std::function<bool(const double* x)> escape;
    bool keep_dense = true;
};

struct SectionHit {
    State state;
    double t_hit = 0.0;
    Trajectory path;
};

Trajectory integrate(const VectorField& f, const State& x0, std::array<double, 2> t_span,
                     const Tolerances& tol, const IntegrateOptions& opt = {});

// t_max is a signed horizon; its sign selects forward or backward time
SectionHit integrate_to_section(const VectorField& f, const State& x0, const SectionSpec& section,
                                double t_max, const Tolerances& tol, const IntegrateOptions& opt = {});

using VectorMap = std::function<State(const State&)>;
using JacobianMap = std::function<std::vector<State>(const State&)>;   // rows

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 30;
    double fd_step = 0.0;          // 0 = sqrt(eps)*max(1,|x|)
    bool central = false;
    double max_cond = 1e12;
    JacobianMap jacobian;          // optional analytic Jacobian
    bool line_search = true;
};

struct NewtonResult {
    State x;
    double residual = 0.0;
    int iterations = 0;
    double cond = 0.0;
    std::vector<State> jacobian;
};

NewtonResult newton_solve(const VectorMap& f, const State& x0, const NewtonOptions& opt = {});

std::vector<State> fd_jacobian(const VectorMap& f, const State& x, const State& fx, double step, bool central);

double norm2(const State& v);
double norm_inf(const State& v);

// fn(0..n-1) on up to `jobs` threads; the first failing index (in index order) is rethrown
template <class Fn>
void parallel_for(int n, int jobs, Fn fn)
{
    std::vector<std::exception_ptr> errors(n);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    int w = std::clamp(jobs, 1, std::max(1, n));
    std::vector<std::thread> pool;
    for (int k = 1; k < w; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace canard
