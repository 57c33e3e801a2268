#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "specvar/certify.hpp"
#include "specvar/io.hpp"

namespace specvar::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kNumerical = 2;
inline constexpr int kIo = 3;

int exit_code(ErrorKind k);

struct LoadedProblem {
    ProblemSpec spec;
    Matrix X0;
    CertifyConfig config;
};

// Matrix paths inside the problem file are relative to its directory.
LoadedProblem load_problem(const std::string& path, bool header = false);

Json certificate_json(const OptimalityCertificate& c);

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace specvar::cli
