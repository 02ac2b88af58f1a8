/*
   Copyright 2026 The sderk Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// Strong convergence order of the lifted RK4 and 9(8) schemes on geometric Brownian motion.

#include <cmath>
#include <iostream>

#include "sderk/sderk.hpp"

int main() {
    const auto gbm = sderk::gbm_system(0.06, 0.5);
    sderk::StrongErrorOptions opt;
    opt.paths = 500;
    opt.seed = 7;

    std::vector<double> hs;
    for (int k = 2; k <= 8; ++k) hs.push_back(std::ldexp(1.0, -k));

    const auto rk4 = sderk::builtin_rk4();
    const auto high = sderk::load_tableau_file(SDERK_DATA_DIR "/tableaus/verner98.tab");
    for (const auto* tab : {&rk4, &high}) {
        std::cout << "# " << tab->name << '\n';
        sderk::write_order_csv(std::cout, sderk::strong_error(gbm, *tab, hs, opt));
    }
}
