#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "privtuner/model.hpp"

namespace privtuner::fitting {

struct SamplePoint {
  double lam = 0.0;
  double value = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares over (lam, value) pairs. Requires at least two
// distinct lambda values.
LinearFit fit_linear(const std::vector<SamplePoint>& samples);

struct ShiftedQuadraticFit {
  double c1 = 0.0; // leading coefficient
  double c2 = 0.0; // shift, so the curve is c1*(lam + c2)^2
  // |c - c1*c2^2| from the unconstrained quadratic fit; a large value means
  // the data is not well described by the shifted-square form.
  double consistency_residual = 0.0;
};

// Fits a*x^2 + b*x + c by least squares and converts to the shifted form.
// Throws std::invalid_argument when the data is not convex increasing
// (fitted a <= 0) or has fewer than three distinct lambdas.
ShiftedQuadraticFit fit_shifted_quadratic(const std::vector<SamplePoint>& samples);

// Constants measured for CKKS encryption/addition/multiplication cycle counts
// and the LWE-estimator security level, at fixed coefficient modulus q = 210
// bits. These are the defaults every generated scenario ships with.
FitModel default_fit();

// (lambda, security bits) pairs: the minimum over the uSVP, BDD and hybrid
// dual lattice attacks for each polynomial degree.
std::vector<SamplePoint> security_dataset();

// Measurement CSV: header line then rows "lambda,value".
std::vector<SamplePoint> load_samples_csv(std::istream& in);
std::vector<SamplePoint> load_samples_csv_file(const std::string& path);

}  // namespace privtuner::fitting
