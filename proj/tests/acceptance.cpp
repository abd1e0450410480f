// Runs the ten acceptance criteria and prints one line per criterion.
//
//   acceptance [--known-failures 3,6]
//
// Exit status is zero only if the failing criteria are exactly the listed
// known failures (analysed in the README); any other failure, or a listed
// criterion that starts passing, is reported and fails the run.

#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "relxi/acceptance.hpp"
#include "relxi/scene_io.hpp"

using namespace relxi;
using namespace relxi::acceptance;

namespace {

Scene corpus_scene(const std::string& name) { return load_scene(std::string(RELXI_SCENE_DIR) + "/" + name); }

Check merge(int criterion, const std::string& name, const std::vector<Check>& parts) {
  Check c{criterion, name, !parts.empty()};
  for (const auto& p : parts) {
    c.passed = c.passed && p.passed;
    c.seconds += p.seconds;
    if (!c.detail.empty()) c.detail += "; ";
    c.detail += p.name + (p.passed ? " ok: " : " FAILED: ") + p.detail;
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--known-failures" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string item; std::getline(list, item, ',');) known.insert(std::atoi(item.c_str()));
    } else {
      std::fprintf(stderr, "usage: acceptance [--known-failures k1,k2,...]\n");
      return 2;
    }
  }
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::map<int, Check> results;
  auto record = [&](const Check& c) {
    results[c.criterion] = c;
    std::printf("%s\n", line(c).c_str());
    std::fflush(stdout);
  };

  const Scene circles = corpus_scene("two_circles.json");
  const Scene spheres = corpus_scene("two_spheres.json");

  {
    SweepOptions o;
    o.n = 256;
    o.threads = threads;
    for (const auto& c : check_decay(circles, decay_window(circles.delta()), o, 1, 2, 0.02)) record(c);
  }
  {
    SweepOptions o;
    o.l_max = 14;
    o.threads = threads;
    const auto checks = check_decay(spheres, make_grid(3.0, 8.0, 13, true), o, 3, 3, 0.03);
    for (const auto& c : checks) {
      if (c.name == "decay rate") {
        std::printf("        (sphere decay rate, informative) %s\n", c.detail.c_str());
      } else {
        record(c);
      }
    }
  }
  record(check_poincare(20, 10));
  record(check_sphere_identity(50));
  record(merge(6, "discretization health",
               {check_quadrature_refinement(circles, 5.0, 128, 1e-8), check_truncation(spheres, 5.0, 12, 1e-6),
                check_sphere_spectrum(1.0, 5.0, 5, 1e-6)}));
  {
    std::vector<std::pair<std::string, Scene>> corpus;
    for (const char* name : {"two_circles.json", "two_spheres.json", "circle_ellipse.json", "three_circles.json",
                             "star_circle.json"}) {
      corpus.emplace_back(name, corpus_scene(name));
    }
    record(check_invariants(corpus));
  }
  {
    const Scene star = corpus_scene("star_circle.json");
    SweepOptions o;
    o.n = 256;
    o.threads = threads;
    for (const auto& c : check_decay(star, decay_window(star.delta()), o, 8, 0, 0.0)) record(c);
  }
  record(check_wave_trace(circles, 0.05, 40.0, threads));
  {
    std::vector<Scene> separations;
    for (double delta : {1.0, 2.0, 3.0}) {
      separations.emplace_back(2,
                               std::vector<ObstacleShape>{Circle{{0.0, 0.0}, 1.0}, Circle{{2.0 + delta, 0.0}, 1.0}});
    }
    record(check_energy(separations));
  }

  int failed = 0, unexpected = 0;
  for (int k = 1; k <= 10; ++k) {
    const auto it = results.find(k);
    const bool passed = it != results.end() && it->second.passed;
    if (it == results.end()) std::printf("[FAIL] criterion %2d  not run\n", k);
    if (!passed) ++failed;
    if (passed == (known.count(k) > 0)) {
      ++unexpected;
      std::printf("criterion %d %s\n", k, passed ? "passed but is listed as a known failure" : "failed unexpectedly");
    }
  }
  std::printf("%d of 10 criteria passed", 10 - failed);
  if (!known.empty()) std::printf(" (%zu listed as known failures)", known.size());
  std::printf("\n");
  return unexpected == 0 ? 0 : 1;
}
