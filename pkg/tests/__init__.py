# SPDX-FileCopyrightText: 2026-present ea42gh <ea42_github@mail.com>
#
# SPDX-License-Identifier: MIT
