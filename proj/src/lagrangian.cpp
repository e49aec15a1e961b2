#include "nmdr/tensor.hpp"
