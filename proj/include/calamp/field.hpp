#pragma once

#include <complex>
#include <type_traits>

namespace calamp {

// Scalar field abstraction: the solver, priors and channels are written once
// and instantiated for real (double) or circularly-symmetric complex
// (std::complex<double>) arithmetic. |x|^2 always means x * conj(x).
template <class T>
struct FieldTraits;

template <>
struct FieldTraits<double> {
  using Real = double;
  static constexpr bool is_complex = false;
  static double conj(double x) { return x; }
  static double abs2(double x) { return x * x; }
  static double real(double x) { return x; }
};

template <>
struct FieldTraits<std::complex<double>> {
  using Real = double;
  static constexpr bool is_complex = true;
  static std::complex<double> conj(const std::complex<double>& x) { return std::conj(x); }
  static double abs2(const std::complex<double>& x) { return std::norm(x); }
  static double real(const std::complex<double>& x) { return x.real(); }
};

template <class T>
inline constexpr bool is_complex_field_v = FieldTraits<T>::is_complex;

template <class T>
double abs2(const T& x) { return FieldTraits<T>::abs2(x); }

}  // namespace calamp
