#pragma once

namespace covtest::dist {

/// Survival of the exponential distribution with scale alpha (mean alpha).
double exp_survival(double t, double scale);
double exp_quantile(double q, double scale);

/// Survival of F(2, m): (1 + 2t/m)^(-m/2). Exact for numerator df 2.
double f2_survival(double t, double m);
double f2_quantile(double q, double m);

/// chi^2 with one degree of freedom.
double chisq1_survival(double t);
double chisq1_quantile(double q);

/// Standard normal quantile (Wichura's AS 241, double precision).
double normal_quantile(double q);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// Survival of F(d1, d2) through the incomplete beta function.
double f_survival(double t, double d1, double d2);

}  // namespace covtest::dist
