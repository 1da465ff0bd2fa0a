#pragma once

#include <stdexcept>
#include <string>

namespace acl
{

// Base for every failure raised by the library. name() is the stable
// identifier written into run records.
class Error : public std::runtime_error
{
public:
  Error(std::string name, std::string const& what)
    : std::runtime_error(name + ": " + what), name_(std::move(name)) {}

  std::string const& name() const { return name_; }

private:
  std::string name_;
};

#define ACL_ERROR(Name)                                              \
  class Name : public Error                                          \
  {                                                                  \
  public:                                                            \
    explicit Name(std::string const& what) : Error(#Name, what) {}   \
  };

ACL_ERROR(DegenerateCurve)
ACL_ERROR(DomainError)
ACL_ERROR(ComparabilityFailure)
ACL_ERROR(GeometricInequalityViolation)
ACL_ERROR(DerivativeBoundViolation)
ACL_ERROR(JacobianAssemblyError)
ACL_ERROR(ErrorDominationFailure)
ACL_ERROR(DegenerateTruncation)
ACL_ERROR(NonGenericTarget)
ACL_ERROR(BoxTooSmall)
ACL_ERROR(ResolutionError)
ACL_ERROR(EmptyIncidence)
ACL_ERROR(RefinementContract)
ACL_ERROR(TowerCollapse)
ACL_ERROR(ConsistencyError)
ACL_ERROR(ExtremalUncertain)
ACL_ERROR(ConfigError)

#undef ACL_ERROR

}
