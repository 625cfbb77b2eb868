# SPDX-FileCopyrightText: 2026-present ea42gh <ea42_github@mail.com>
#
# SPDX-License-Identifier: MIT
__version__ = "0.1.0"
__build__ = "pomdpfsc 2026-10-18"
