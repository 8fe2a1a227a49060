#pragma once

#include "spectra_gap/error.hpp"
#include "spectra_gap/matrix.hpp"
#include "spectra_gap/commutator.hpp"
#include "spectra_gap/sym_eig.hpp"
#include "spectra_gap/complex_eig.hpp"
#include "spectra_gap/grid.hpp"
#include "spectra_gap/operators.hpp"
#include "spectra_gap/identities.hpp"
#include "spectra_gap/bounds.hpp"
#include "spectra_gap/oracle.hpp"
#include "spectra_gap/random.hpp"
#include "spectra_gap/report.hpp"
#include "spectra_gap/cli.hpp"
