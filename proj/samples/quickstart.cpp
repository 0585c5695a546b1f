// Runs a short surrogate search in memory and prints the final front and the
// knee architecture.

#include <cstdio>

#include "cgpnas/cgpnas.hpp"

int main(int argc, char** argv) {
  cgpnas::RunConfig cfg;
  if (argc > 1) cfg = cgpnas::RunConfig::load(argv[1]);
  cfg.check();

  cgpnas::SurrogateEvaluator evaluator;
  cgpnas::Engine engine(cfg, evaluator);
  engine.run();

  const auto& front = engine.state().archive.members();
  std::printf("%zu archive members after %d generations\n", front.size(), cfg.search.generations);
  for (const auto& e : front)
    std::printf("  id %-5llu f1 %.4f  madds %.2fM\n", static_cast<unsigned long long>(e.id), e.objectives.error,
                e.objectives.madds / 1e6);

  for (const auto& r : cgpnas::select_roles(front))
    std::printf("%-15s id %llu\n", r.role.c_str(), static_cast<unsigned long long>(r.entry.id));
  std::printf("mobile feasible front members: ");
  int n = 0;
  for (const auto& e : front) n += cgpnas::is_mobile_feasible(static_cast<std::uint64_t>(e.objectives.madds));
  std::printf("%d\n", n);
}
