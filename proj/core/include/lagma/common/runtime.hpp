#pragma once

namespace lagma {

/// Keeps large tensor buffers on the heap instead of mapping and unmapping
/// them on every allocation. Training allocates and frees multi-megabyte
/// buffers thousands of times per second, and without this the kernel time
/// rivals the arithmetic. Process-wide; call once from main().
void configure_allocator();

}  // namespace lagma
