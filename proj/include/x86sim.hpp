#pragma once

#include "x86sim/bits.hpp"
#include "x86sim/config.hpp"
#include "x86sim/decoder.hpp"
#include "x86sim/elf.hpp"
#include "x86sim/environment.hpp"
#include "x86sim/flags.hpp"
#include "x86sim/init.hpp"
#include "x86sim/instrument.hpp"
#include "x86sim/interpreter.hpp"
#include "x86sim/memory.hpp"
#include "x86sim/msr.hpp"
#include "x86sim/paging.hpp"
#include "x86sim/semantics.hpp"
#include "x86sim/session.hpp"
#include "x86sim/state.hpp"
#include "x86sim/status.hpp"
#include "x86sim/syscalls.hpp"
#include "x86sim/undef.hpp"
