# This file is needed for coveralls on travis.
# See http://thomas-cokelaer.info/blog/2017/01/pytest-cov-collects-no-data-on-travis/
