// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ENZRES_VALIDATION_HPP
#define ENZRES_VALIDATION_HPP

#include <ostream>
#include <string>
#include <vector>

namespace enzres
{

struct Check
{
  std::string name;
  double value = 0.0;
  std::string bound;  // human-readable acceptance bound
  bool pass = false;
};

struct DiskReport
{
  double h = 0.0;
  std::vector<Check> checks;

  bool Passed() const;
};

// ENZRES_THREADS, default 1; rejects non-positive or malformed values.
int ThreadsFromEnv();

struct DiskOptions
{
  double h = 0.02;  // finest mesh; the convergence studies also use 2h and 4h
  int threads = 1;
  bool design = true;
};

// Disk oracle suite: λ0 and λ1 against the Bessel closed forms, series vs
// direct remainders, recursion invariants, the lossy-ENZ trace and the
// optimal shell.
DiskReport ValidateDisk(const DiskOptions &opts);

void WriteReport(const DiskReport &report, std::ostream &out);

}  // namespace enzres

#endif  // ENZRES_VALIDATION_HPP
