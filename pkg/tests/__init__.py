# Tests package for msrcert
