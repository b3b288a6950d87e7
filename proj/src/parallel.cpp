#include "unlearn/parallel.hpp"

namespace unlearn {
namespace {
ExecMode g_mode = ExecMode::OpenMP;
int g_workers = 0;
}  // namespace

ExecMode default_exec_mode() { return g_mode; }
void set_default_exec_mode(ExecMode mode) { g_mode = mode; }

void set_worker_count(int workers) { g_workers = workers < 0 ? 0 : workers; }
int worker_count() { return g_workers; }

}  // namespace unlearn
