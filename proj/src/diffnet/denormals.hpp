#pragma once

#if defined(__SSE__) || defined(_M_X64)
#include <xmmintrin.h>
#define FACEMIMIC_HAVE_MXCSR 1
#endif

namespace facemimic::diffnet {

/// Flush-to-zero and denormals-are-zero for the current thread while in scope.
/// Denormal activations and moments otherwise slow float math by two orders of magnitude.
class DenormalsFlushed {
public:
#ifdef FACEMIMIC_HAVE_MXCSR
    DenormalsFlushed() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
    ~DenormalsFlushed() { _mm_setcsr(saved_); }

private:
    unsigned int saved_;
#endif
public:
    DenormalsFlushed(const DenormalsFlushed&) = delete;
    DenormalsFlushed& operator=(const DenormalsFlushed&) = delete;
};

}  // namespace facemimic::diffnet
