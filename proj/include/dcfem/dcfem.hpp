// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dcfem/adjoint.hpp"
#include "dcfem/assembly.hpp"
#include "dcfem/defect.hpp"
#include "dcfem/error.hpp"
#include "dcfem/estimator.hpp"
#include "dcfem/geometry.hpp"
#include "dcfem/linalg.hpp"
#include "dcfem/material.hpp"
#include "dcfem/mesh.hpp"
#include "dcfem/mesh_io.hpp"
#include "dcfem/problem.hpp"
#include "dcfem/qoi.hpp"
#include "dcfem/quadrature.hpp"
#include "dcfem/rbf.hpp"
#include "dcfem/study.hpp"
