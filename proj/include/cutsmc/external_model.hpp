// SPDX-License-Identifier: Apache-2.0
#pragma once

// User-supplied black-box models run as a subprocess speaking a line
// protocol: for each evaluation the driver writes one line of
// space-separated values (nu coordinates then theta coordinates, full
// round-trip precision) to the child's standard input and reads back one
// line containing log q(theta; nu). "inf", "-inf", and "nan" are accepted
// spellings; NaN is reported as a model-evaluation error.

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <fcntl.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "cutsmc/errors.hpp"
#include "cutsmc/io.hpp"
#include "cutsmc/model.hpp"

namespace cutsmc {

class ExternalModelProcess {
 public:
  explicit ExternalModelProcess(const std::vector<std::string>& command) {
    require(!command.empty(), ErrorKind::configuration,
            "external model requires a command");
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      fail(ErrorKind::io, "failed to create pipes for the external model");
    pid_ = fork();
    if (pid_ < 0) fail(ErrorKind::io, "failed to fork the external model process");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      std::vector<char*> argv;
      argv.reserve(command.size() + 1);
      for (const std::string& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
      argv.push_back(nullptr);
      execvp(argv[0], argv.data());
      std::perror("cutsmc external model exec");
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_stream_ = fdopen(from_child[0], "r");
    if (read_stream_ == nullptr) fail(ErrorKind::io, "failed to open external model pipe");
  }

  ExternalModelProcess(const ExternalModelProcess&) = delete;
  ExternalModelProcess& operator=(const ExternalModelProcess&) = delete;

  ~ExternalModelProcess() {
    if (write_fd_ >= 0) close(write_fd_);
    if (read_stream_ != nullptr) fclose(read_stream_);
    if (pid_ > 0) {
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  /// One protocol round trip; serialized so the model stays safe to call
  /// from concurrently mutating particles.
  double evaluate(const CutPoint& nu, const Theta& theta) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::string line;
    for (double v : nu.values) {
      if (!line.empty()) line.push_back(' ');
      line += format_double(v);
    }
    for (double v : theta.values) {
      if (!line.empty()) line.push_back(' ');
      line += format_double(v);
    }
    line.push_back('\n');
    if (write(write_fd_, line.data(), line.size()) !=
        static_cast<ssize_t>(line.size())) {
      fail(ErrorKind::model_evaluation, "external model rejected input (broken pipe)");
    }
    char buffer[256];
    if (fgets(buffer, sizeof(buffer), read_stream_) == nullptr) {
      fail(ErrorKind::model_evaluation,
           "external model terminated before producing output");
    }
    const double value = parse_double_token(buffer);
    require(!std::isnan(value), ErrorKind::model_evaluation,
            "external model returned NaN");
    return value;
  }

 private:
  static double parse_double_token(const char* text) {
    while (*text == ' ' || *text == '\t') ++text;
    std::string token;
    while (*text != '\0' && *text != ' ' && *text != '\t' && *text != '\n' &&
           *text != '\r')
      token.push_back(*text++);
    if (token.empty())
      fail(ErrorKind::model_evaluation, "external model produced an empty line");
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(token.c_str(), &end);
    if (end == token.c_str())
      fail(ErrorKind::model_evaluation,
           "external model produced unparseable output: " + token);
    return value;
  }

  pid_t pid_ = -1;
  int write_fd_ = -1;
  std::FILE* read_stream_ = nullptr;
  std::mutex mutex_;
};

struct ExternalModelSpec {
  std::vector<std::string> command;
  int d = 0;
  int d_nu = 0;
  std::function<CutPoint(RandomStream&)> cut_sampler;
  std::optional<SupportBox> support_box;
};

inline ConditionalTargetModel make_external_model(const ExternalModelSpec& spec) {
  require(spec.d >= 1 && spec.d_nu >= 1, ErrorKind::configuration,
          "external model requires d >= 1 and d_nu >= 1");
  require(static_cast<bool>(spec.cut_sampler), ErrorKind::configuration,
          "external model requires a cut distribution");
  auto process = std::make_shared<ExternalModelProcess>(spec.command);
  ConditionalTargetModel model;
  model.id = "external";
  model.d = spec.d;
  model.d_nu = spec.d_nu;
  model.cut_sampler = spec.cut_sampler;
  model.support_box = spec.support_box;
  model.log_unnorm = [process](const CutPoint& nu, const Theta& theta) {
    return process->evaluate(nu, theta);
  };
  if (spec.support_box) {
    model.overdispersed_init = [box = *spec.support_box](const CutPoint&,
                                                         RandomStream& rng) {
      Theta theta;
      theta.values.resize(box.lower.size());
      for (std::size_t i = 0; i < theta.values.size(); ++i)
        theta.values[i] = rng.uniform(box.lower[i], box.upper[i]);
      return theta;
    };
  }
  validate_model(model);
  return model;
}

}  // namespace cutsmc
