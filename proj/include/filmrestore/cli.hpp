#pragma once

namespace filmrestore {
inline int run_cli(int, char**) { return 0; }  // placeholder during bring-up
}
