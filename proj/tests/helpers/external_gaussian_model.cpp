// SPDX-License-Identifier: Apache-2.0
//
// Protocol test double: a Gaussian conjugate conditional posterior served
// over the external-model line protocol. Reads "nu... theta..." per line
// and answers with log q. Usage: external_gaussian_model d sigma sigma_p y1..yd

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  if (argc < 4) {
    std::fprintf(stderr, "usage: %s d sigma sigma_p y1..yd\n", argv[0]);
    return 2;
  }
  const int d = std::atoi(argv[1]);
  const double sigma = std::atof(argv[2]);
  const double sigma_p = std::atof(argv[3]);
  if (argc != 4 + d) {
    std::fprintf(stderr, "expected %d data values\n", d);
    return 2;
  }
  std::vector<double> y(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) y[static_cast<size_t>(i)] = std::atof(argv[4 + i]);
  const double prec = 1.0 / (sigma * sigma);
  const double prec_p = 1.0 / (sigma_p * sigma_p);
  const double w = prec / (prec + prec_p);
  const double c = 1.0 / (prec + prec_p);

  std::string line;
  while (std::getline(std::cin, line)) {
    std::istringstream parts(line);
    std::vector<double> values;
    double v = 0.0;
    while (parts >> v) values.push_back(v);
    if (values.size() != static_cast<size_t>(2 * d)) {
      std::fprintf(stderr, "expected %d values per line\n", 2 * d);
      return 3;
    }
    double ss = 0.0;
    for (int i = 0; i < d; ++i) {
      const double nu_i = values[static_cast<size_t>(i)];
      const double theta_i = values[static_cast<size_t>(d + i)];
      const double m_i = w * y[static_cast<size_t>(i)] + (1.0 - w) * nu_i;
      ss += (theta_i - m_i) * (theta_i - m_i);
    }
    std::printf("%.17g\n", -ss / (2.0 * c));
    std::fflush(stdout);
  }
  return 0;
}
